// expect: Terminating
u8 x;
while (x > 0) {
  x = (x - 1) & x;
}
