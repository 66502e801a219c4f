// Both branches do the same thing, so nothing leaks, but the guard is secret.
void hi_guard_same(int h, int l)
//@ logical x.h in {0,1};
//@ pre PROP() LOCAL(h = x.h) SEP(), [h: Hi, l: Lo], [];
//@ post (nrm: true, [l: Lo], []);
{
  if (h) {
    l = 0;
  } else {
    l = 0;
  }
}
