// expect: Terminating
u4 i;
u4 j;
u4 n;
while (i < n) {
  j = 0;
  while (j <= i) {
    j = j + 1;
  }
  i = i + 1;
}
