double control(double y){
  if (y < 0.15){
    u = 1;
  } else {
    u = -1;
  }
  return u;
}
