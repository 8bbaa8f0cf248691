#pragma once

// Shared by the unit tests and the acceptance binary.

#include "dyanim/event.hpp"

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef DYANIM_FIXTURES
#define DYANIM_FIXTURES "tests/fixtures"
#endif

namespace dyanim::testing {

inline std::string fixture(const std::string& name) { return std::string{DYANIM_FIXTURES} + "/" + name; }

inline proto::Trace load_trace(const std::string& name)
{
    std::ifstream in{fixture(name)};
    if (!in) throw std::runtime_error("missing fixture " + name);
    proto::Trace t;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) t.push_back(proto::parse_event(line));
    }
    return t;
}

inline proto::Event ev(std::string_view text) { return proto::parse_event(text); }

inline std::vector<proto::Event> evs(std::initializer_list<std::string_view> texts)
{
    std::vector<proto::Event> out;
    for (auto t : texts) out.push_back(ev(t));
    return out;
}

}  // namespace dyanim::testing
