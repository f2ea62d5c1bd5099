double control(double y){
  u = -y;
  return u;
}
