// Count loop iterations, skipping the first one with continue.
int skip_first(int n)
//@ logical x.n in {0..3};
//@ pre PROP() LOCAL(n = x.n) SEP(), [n: Lo], [];
//@ post (ret: true, [ret_val: Lo], []);
{
  int i = 0;
  int c = 0;
  //@ invariant PROP() LOCAL(n = x.n) SEP(), [n: Lo, i: Lo, c: Lo], [];
  loop (i = i + 1;) {
    if (n < i + 1) {
      break;
    }
    if (i == 1) {
      continue;
    }
    c = c + 1;
  }
  return c;
}
