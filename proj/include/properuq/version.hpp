#ifndef PROPERUQ_VERSION_HPP
#define PROPERUQ_VERSION_HPP

namespace properuq {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace properuq

#endif
