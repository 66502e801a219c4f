// Implicit flow: a secret guard picks the public value.
void hi_guard_assign(int h, int l)
//@ logical x.h in {0,1};
//@ pre PROP() LOCAL(h = x.h) SEP(), [h: Hi, l: Lo], [];
//@ post (nrm: true, [l: Lo], []);
{
  if (h) {
    l = 1;
  } else {
    l = 0;
  }
}
