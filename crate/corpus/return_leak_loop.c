// Spin on a public counter, then return the secret.
int leak_in_loop(int sec, int n)
//@ logical x.s in {0,1}, x.n in {0,1};
//@ pre PROP() LOCAL(sec = x.s, n = x.n) SEP(), [sec: Hi, n: Lo], [];
//@ post (ret: true, [ret_val: Lo], []);
{
  int i = 0;
  //@ invariant PROP() LOCAL() SEP(), [sec: Hi, n: Lo, i: Lo], [];
  while (1) {
    if (i == n) {
      return sec;
    }
    i = i + 1;
  }
}
