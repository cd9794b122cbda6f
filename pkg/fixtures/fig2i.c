// expect: Terminating
u8 x;
u8 y;
u8 z;
while (x > 0 && y > 0 && z > 0) {
  if (y > x) {
    y = z;
    x = nondet();
    z = x - 1;
  } else {
    z = z - 1;
    x = nondet();
    y = x - 1;
  }
}
