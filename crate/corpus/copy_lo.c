// Public data feeds public outputs; secrets only mix into secrets.
void copy_lo(int sec, int pub, int out)
//@ logical x.s in {0,1}, x.p in {0,1};
//@ pre PROP() LOCAL(sec = x.s, pub = x.p) SEP(), [sec: Hi, pub: Lo, out: Lo], [];
//@ post (nrm: true, [pub: Lo, out: Lo], []);
{
  out = pub + 1;
  sec = sec + pub;
}
