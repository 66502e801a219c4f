// Implicit flow into a public cell.
//@ heap 1 region o @ 0;
void hi_guard_store(int h, int* op)
//@ logical x.h in {0,1};
//@ pre PROP() LOCAL(h = x.h, op = &o) SEP(&o |-> _), [h: Hi, op: Lo], [&o: Lo];
//@ post (nrm: true, [], [&o: Lo]);
{
  if (h) {
    *op = 1;
  } else {
    *op = 0;
  }
}
