// Fold a public counter into a secret accumulator.
void hi_accumulate(int sec, int n)
//@ logical x.n in {0,1,2};
//@ pre PROP() LOCAL(n = x.n) SEP(), [sec: Hi, n: Lo], [];
//@ post (nrm: true, [n: Lo], []);
{
  int i = 0;
  //@ invariant PROP() LOCAL(n = x.n) SEP(), [sec: Hi, n: Lo, i: Lo], [];
  while (i < n) {
    sec = sec + i;
    i = i + 1;
  }
}
