// Return from inside a loop as soon as the key is reached.
int index_of(int key)
//@ logical x.k in {0,1,2};
//@ pre PROP() LOCAL(key = x.k) SEP(), [key: Lo], [];
//@ post (ret: true, [ret_val: Lo], []);
{
  int i = 0;
  //@ invariant PROP() LOCAL(key = x.k) SEP(), [key: Lo, i: Lo], [];
  while (i < 3) {
    if (i == key) {
      return i;
    }
    i = i + 1;
  }
  return 3;
}
