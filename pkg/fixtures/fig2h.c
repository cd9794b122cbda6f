// expect: Terminating
u8 x;
u8 y;
y = 1;
while (x > 0) {
  x = x - y;
}
