// expect: Terminating
i8 x;
while (x != 0) {
  if (x > 0)
    x--;
  else
    x++;
}
