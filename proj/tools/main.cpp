#include <cstdio>

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::puts("dbenet: subcommands not wired up yet");
  return 0;
}
