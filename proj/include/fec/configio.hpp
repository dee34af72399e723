#ifndef FEC_CONFIGIO_HPP
#define FEC_CONFIGIO_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fec/codec.hpp"
#include "fec/ratematch.hpp"

namespace fec {

// Built-in QPP coefficient table (f1, f2) per block length. Entries for
// K in {40, 120, 240, 480, 960} follow 3GPP TS 36.212 Table 5.1.3-3; the
// small desk-scale lengths were constructed and are validated by the
// bijectivity check in qpp_build.
const std::map<int, std::pair<long long, long long>>& qpp_defaults();

// Load additional/override coefficients from a JSON file of the form
// {"120": [103, 90], ...}.
std::map<int, std::pair<long long, long long>> load_qpp_file(const std::string& path);

// Interleaver for block length K from the default table (plus overrides).
QppInterleaver qpp_for_k(int K);
QppInterleaver qpp_for_k(int K, const std::map<int, std::pair<long long, long long>>& table);

// Trellis presets addressable by name: "wifi-cc-k7", "lte-turbo-constituent".
Trellis trellis_by_name(const std::string& name);

// Puncturing pattern files: {"name": "3/4", "mother_rate": "1/2",
// "period": 3, "keep": ["110", "101"]}.
PuncturingPattern load_pattern_file(const std::string& path);
void save_pattern_file(const std::string& path, const PuncturingPattern& p);

} // namespace fec

#endif
