#include "hkl/workers.hpp"

#include <cstdlib>
#include <string>

namespace hkl {

int worker_count() {
    if (const char* env = std::getenv("HKL_WORKERS")) {
        try {
            int n = std::stoi(env);
            if (n > 0) return n;
        } catch (...) {
        }
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace hkl
