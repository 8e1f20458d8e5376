#include "cepred/schedule.hpp"

#include <charconv>
#include <sstream>

namespace cepred {

namespace {

bool parse_double(const std::string& text, double& out) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

StepSchedule StepSchedule::parse(const std::string& text) {
    if (text == "1/t") return power(1.0);
    double value = 0.0;
    if (parse_double(text, value)) return constant(value);

    // "t^-a" or "s*t^-a"
    double scale = 1.0;
    std::string rest = text;
    const auto star = text.find('*');
    if (star != std::string::npos) {
        if (!parse_double(text.substr(0, star), scale))
            throw ConfigError("step schedule: bad scale in '" + text + "'");
        rest = text.substr(star + 1);
    }
    if (rest.rfind("t^", 0) == 0) {
        double expo = 0.0;
        if (parse_double(rest.substr(2), expo))
            return power(-expo, scale);
    }
    throw ConfigError("step schedule: cannot parse '" + text + "'");
}

std::string StepSchedule::describe() const {
    std::ostringstream os;
    if (is_constant()) {
        os << scale_ << " (constant-step mode, theory conditions waived)";
    } else {
        if (scale_ != 1.0) os << scale_ << "*";
        os << "t^-" << exponent_;
        if (!satisfies_theory()) os << " (outside the square-summable range)";
    }
    return os.str();
}

}  // namespace cepred
