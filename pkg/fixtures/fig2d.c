u8 i;
u8 j;
u8 M;
u8 N;
while (i < M || j < N) {
  i = i + 1;
  j = j + 1;
}
