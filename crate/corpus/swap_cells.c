// Swap two public cells through local temporaries.
//@ heap 2 region p @ 0 region q @ 1;
void swap(int* a, int* b)
//@ logical x.u in {0,1}, x.v in {0,1};
//@ pre PROP() LOCAL(a = &p, b = &q) SEP(&p |-> x.u, &q |-> x.v), [a: Lo, b: Lo], [&p: Lo, &q: Lo];
//@ post (nrm: PROP() LOCAL() SEP(&p |-> x.v, &q |-> x.u), [a: Lo, b: Lo], [&p: Lo, &q: Lo]);
{
  int t = *a;
  int u = *b;
  *a = u;
  *b = t;
}
