// Direct assignment of a secret to a public variable.
void leak(int sec, int pub)
//@ logical x.s in {0,1}, x.p in {0,1};
//@ pre PROP() LOCAL(sec = x.s, pub = x.p) SEP(), [sec: Hi, pub: Lo], [];
//@ post (nrm: true, [pub: Lo], []);
{
  pub = sec;
}
