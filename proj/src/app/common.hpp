#pragma once

#include <string>

#include "pastagen/app.hpp"
#include "pastagen/volume.hpp"

namespace pastagen::app_detail {

struct LoadedScan {
    Volume3D image;
    LabelMap organs;
    std::optional<LabelMap> structures;
};

/// Reads a scan and brings it to canonical orientation at 1 mm.
LoadedScan load_scan(const fs::path& image, const fs::path& labels, const std::optional<fs::path>& structures);

std::string json_string(const nlohmann::json& j, const char* key);

}  // namespace pastagen::app_detail

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace pastagen::app_detail {

/// Runs fn(i) for i in [0, n) on `workers` threads. The first exception is
/// rethrown after all threads finish.
template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w)
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
                next = n;
            }
        });
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace pastagen::app_detail
