#include <cstdio>

int main() {
    std::puts("pursuit: command-line interface not wired up yet");
    return 2;
}
