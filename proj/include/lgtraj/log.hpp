#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>

namespace lgtraj
{
//---------------------------------------------------------------------------//
// Minimal warning sink. Regime violations and truncation concerns are
// reported here rather than thrown.
//---------------------------------------------------------------------------//
using WarningHandler = std::function<void(const std::string&)>;

namespace detail
{
inline std::mutex& warning_mutex()
{
    static std::mutex m;
    return m;
}

inline WarningHandler& warning_handler()
{
    static WarningHandler handler = [](const std::string& msg) {
        std::clog << "warning: " << msg << '\n';
    };
    return handler;
}
} // namespace detail

//! Replace the warning handler; returns the previous one.
inline WarningHandler set_warning_handler(WarningHandler handler)
{
    std::lock_guard<std::mutex> lock(detail::warning_mutex());
    std::swap(detail::warning_handler(), handler);
    return handler;
}

inline void warn(const std::string& msg)
{
    std::lock_guard<std::mutex> lock(detail::warning_mutex());
    if (detail::warning_handler())
        detail::warning_handler()(msg);
}

} // namespace lgtraj
