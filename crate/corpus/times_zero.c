// Multiplying by zero erases the secret; labels cannot tell.
void times_zero(int sec, int pub)
//@ logical x.s in {0,1};
//@ pre PROP() LOCAL(sec = x.s) SEP(), [sec: Hi, pub: Lo], [];
//@ post (nrm: true, [pub: Lo], []);
{
  pub = sec * 0;
}
