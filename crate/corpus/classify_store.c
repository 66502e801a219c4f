// Store v into the high or the low cell depending on a public flag b.
// v is secret exactly when b is set.
//@ heap 2 region hi @ 0 region lo @ 1;
void f(int v, bool b, int* highptr, int* lowptr)
//@ logical x.v in {0..3}, x.b in {0,1}, x.h in {&hi}, x.l in {&lo};
//@ pre PROP() LOCAL(v = x.v, b = x.b, highptr = x.h, lowptr = x.l) SEP(x.h |-> _, x.l |-> _),
//@     [b: Lo, highptr: Hi, lowptr: Lo, v: (x.b ? Hi : Lo)], [x.l: Lo, x.h: Hi];
//@ post (nrm: PROP() LOCAL() SEP(x.h |-> (x.b ? x.v : _), x.l |-> (x.b ? _ : x.v)), [], [x.l: Lo, x.h: Hi]);
{
  if (b) {
    *highptr = v;
  } else {
    *lowptr = v;
  }
}
