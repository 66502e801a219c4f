// The result does not depend on sec, but its label does.
void sec_minus_sec(int sec, int pub)
//@ logical x.s in {0,1};
//@ pre PROP() LOCAL(sec = x.s) SEP(), [sec: Hi, pub: Lo], [];
//@ post (nrm: true, [pub: Lo], []);
{
  pub = sec - sec;
}
