#pragma once

#include "maxcal/decomposition.hpp"
#include "maxcal/pricing.hpp"

#include <string>

namespace maxcal {

std::string to_json(const ValidationReport& r);
std::string to_json(const Decomposition& d);
std::string to_json(const ArbitrageCertificate& c);
std::string to_json(const BoundResult& b);

// Inverse of to_json(ArbitrageCertificate); throws ParseError on bad input.
ArbitrageCertificate certificate_from_json(const std::string& text);

} // namespace maxcal
