// Linear search over a public range, leaving the loop with break.
int first_match(int key, int n)
//@ logical x.k in {0,1,2}, x.n in {0,1,2};
//@ pre PROP() LOCAL(key = x.k, n = x.n) SEP(), [key: Lo, n: Lo], [];
//@ post (ret: true, [ret_val: Lo], []);
{
  int i = 0;
  int found = 0;
  //@ invariant PROP() LOCAL(key = x.k, n = x.n) SEP(), [key: Lo, n: Lo, i: Lo, found: Lo], [];
  while (i < n) {
    if (i == key) {
      found = 1;
      break;
    }
    i = i + 1;
  }
  return found;
}
