#include "hybridjd/parallel.hpp"

#include <cstdlib>
#include <string>

namespace hybridjd {

int default_threads() {
    if (const char* env = std::getenv("HYBRIDJD_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace hybridjd
