#include "covstream/error.hpp"

#include <iostream>
#include <mutex>

namespace covstream {
namespace {

std::mutex& handler_mutex() {
    static std::mutex m;
    return m;
}

WarningHandler& handler() {
    static WarningHandler h = [](std::string_view msg) {
        std::cerr << "covstream: warning: " << msg << '\n';
    };
    return h;
}

}  // namespace

void set_warning_handler(WarningHandler h) {
    std::lock_guard lock(handler_mutex());
    handler() = std::move(h);
}

void warn(std::string_view message) {
    std::lock_guard lock(handler_mutex());
    if (handler()) {
        handler()(message);
    }
}

}  // namespace covstream
