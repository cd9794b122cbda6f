// expect: NonTerminating
// M = N = 2^4 - 1 at width 4
u4 i;
u4 j;
while (i < 15 || j < 15) {
  i = i + 1;
  j = j + 1;
}
