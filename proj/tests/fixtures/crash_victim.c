#include <signal.h>

// Entry for an external victim that dies mid-run.
void crash_entry(void) { raise(SIGSEGV); }
