#include "bitrans/harness/seed.hpp"
