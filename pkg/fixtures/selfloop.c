// expect: NonTerminating
u4 x;
while (x != 0) {
  x = x;
}
