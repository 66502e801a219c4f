// Over the declared range the comparison is always true.
void cond_const(int sec, bool pub)
//@ logical x.s in {0,1};
//@ pre PROP() LOCAL(sec = x.s) SEP(), [sec: Hi, pub: Lo], [];
//@ post (nrm: true, [pub: Lo], []);
{
  pub = sec < 5;
}
