#pragma once

#include <stdexcept>
#include <string>

namespace ink {

// The CLI maps these onto exit codes 1, 2 and 3 respectively.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-fatal finding attached to a file position; collected, never thrown.
struct Warning {
    std::string where;
    int line = 0;
    std::string message;

    std::string str() const {
        std::string s = where;
        if (line > 0) s += ":" + std::to_string(line);
        if (!s.empty()) s += ": ";
        return s + message;
    }
};

}  // namespace ink
