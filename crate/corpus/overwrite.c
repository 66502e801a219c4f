// A secret passes through pub but is overwritten before the end.
void overwrite(int sec, int pub)
//@ logical x.s in {0,1};
//@ pre PROP() LOCAL(sec = x.s) SEP(), [sec: Hi, pub: Lo], [];
//@ post (nrm: true, [pub: Lo], []);
{
  pub = sec;
  pub = 0;
}
