// expect: Terminating
i8 x;
while (x != 0) {
  x = -x / 2;
}
