// A public value goes through a helper and comes back public.
int inc(int a)
//@ logical x.a in {0,1,2};
//@ pre PROP() LOCAL(a = x.a) SEP(), [a: Lo], [];
//@ post (ret: PROP() LOCAL(ret_val = x.a + 1) SEP(), [ret_val: Lo], []);
{
  return a + 1;
}

void caller(int p, int s)
//@ logical x.p in {0,1};
//@ pre PROP() LOCAL(p = x.p) SEP(), [p: Lo, s: Hi], [];
//@ post (nrm: true, [p: Lo], []);
{
  p = inc(p);
}
