// expect: NonTerminating
u4 x;
u4 y;
while (x != 0) {
  y = nondet();
  x = x - y;
}
