// The guard is secret whenever b is set.
void hi_guard_valdep(int v, int b, int l)
//@ logical x.v in {0,1}, x.b in {0,1};
//@ pre PROP() LOCAL(v = x.v, b = x.b) SEP(), [b: Lo, v: (x.b ? Hi : Lo), l: Lo], [];
//@ post (nrm: true, [b: Lo, l: Lo], []);
{
  if (v) {
    l = 1;
  } else {
    l = 0;
  }
}
