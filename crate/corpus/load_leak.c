// A secret cell is read into a public variable.
//@ heap 1 region s @ 0;
void load_leak(int* sp, int pub)
//@ logical x.s in {0,1};
//@ pre PROP() LOCAL(sp = &s) SEP(&s |-> x.s), [sp: Lo, pub: Lo], [&s: Hi];
//@ post (nrm: true, [pub: Lo], []);
{
  pub = *sp;
}
