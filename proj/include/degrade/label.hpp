#pragma once

#include <string>
#include <string_view>

#include "degrade/error.hpp"

namespace degrade {

enum class Label { real = 0, fake = 1 };

inline std::string_view label_name(Label label) {
    return label == Label::fake ? "fake" : "real";
}

inline Label parse_label(std::string_view text) {
    if (text == "real") return Label::real;
    if (text == "fake") return Label::fake;
    raise(Errc::invalid_parameter, "label must be 'real' or 'fake', got '" + std::string(text) + "'");
}

}  // namespace degrade
