// expect: NonTerminating
// inner loop terminates; the outer loop keeps x unchanged
u3 x;
u3 y;
while (x > 0) {
  y = 0;
  while (y < 3) {
    y = y + 1;
  }
  x = x;
}
