// A loop guarded by a secret bumps a public counter.
void hi_guard_loop(int h, int l)
//@ logical x.h in {0,1};
//@ pre PROP() LOCAL(h = x.h) SEP(), [h: Hi, l: Lo], [];
//@ post (nrm: true, [l: Lo], []);
{
  //@ invariant PROP() LOCAL() SEP(), [h: Hi, l: Lo], [];
  while (h) {
    l = l + 1;
    h = 0;
  }
}
