// Branch on a public flag; the secret only reaches the secret cell.
//@ heap 2 region s @ 0 region o @ 1;
void publish(int flag, int secret, int* sp, int* op)
//@ logical x.f in {0,1};
//@ pre PROP() LOCAL(flag = x.f, sp = &s, op = &o) SEP(&s |-> _, &o |-> _),
//@     [flag: Lo, secret: Hi, sp: Lo, op: Lo], [&s: Hi, &o: Lo];
//@ post (nrm: true, [flag: Lo], [&s: Hi, &o: Lo]);
{
  if (flag) {
    *sp = secret;
    *op = 1;
  } else {
    *op = 0;
  }
}
