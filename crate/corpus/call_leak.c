// A helper hands a secret back and the caller stores it publicly.
int ident(int a)
//@ logical x.a in {0,1};
//@ pre PROP() LOCAL(a = x.a) SEP(), [a: Hi], [];
//@ post (ret: PROP() LOCAL(ret_val = x.a) SEP(), [ret_val: Hi], []);
{
  return a;
}

void caller(int sec, int pub)
//@ logical x.s in {0,1};
//@ pre PROP() LOCAL(sec = x.s) SEP(), [sec: Hi, pub: Lo], [];
//@ post (nrm: true, [pub: Lo], []);
{
  pub = ident(sec);
}
