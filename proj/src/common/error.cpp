#include "longqa/error.hpp"

namespace longqa {

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::config: return 2;
        case ErrorKind::transport: return 3;
        case ErrorKind::fixture_miss: return 4;
        case ErrorKind::pipeline: return 5;
    }
    return 5;
}

}  // namespace longqa
