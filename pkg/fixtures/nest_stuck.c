// expect: NonTerminating
// the inner loop never exits once entered
u4 x;
u4 y;
while (x > 0) {
  y = 1;
  while (y > 0) {
    y = y;
  }
  x = x;
}
