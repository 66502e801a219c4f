// A secret is written to a public cell.
//@ heap 1 region o @ 0;
void store_leak(int secret, int* op)
//@ logical x.s in {0,1};
//@ pre PROP() LOCAL(secret = x.s, op = &o) SEP(&o |-> _), [secret: Hi, op: Lo], [&o: Lo];
//@ post (nrm: true, [], [&o: Lo]);
{
  *op = secret;
}
