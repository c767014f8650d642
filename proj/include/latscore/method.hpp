#ifndef LATSCORE_METHOD_HPP
#define LATSCORE_METHOD_HPP

#include <optional>
#include <string>

namespace latscore {

enum class Method {
  normal,
  espa,
  espa_cc,
  dspa_cc,
  fast_spa,
  fast_dspa_cc,
  exact_intercept,
  exact_binary,
};

std::string method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

inline bool is_exact_method(Method m) {
  return m == Method::exact_intercept || m == Method::exact_binary;
}
inline bool is_fast_method(Method m) {
  return m == Method::fast_spa || m == Method::fast_dspa_cc;
}
/// Methods that treat the statistic as a step-1 lattice variable.
inline bool is_lattice_method(Method m) {
  return m == Method::espa_cc || m == Method::dspa_cc ||
         m == Method::fast_dspa_cc || is_exact_method(m);
}

}  // namespace latscore

#endif
