#include <cstdio>
int main() { std::puts("bss-lab placeholder"); return 0; }
