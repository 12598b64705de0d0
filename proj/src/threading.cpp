//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file src/threading.cpp
//---------------------------------------------------------------------------//
#include "maglarmor/threading.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace maglarmor
{
namespace
{
int g_threads = 0;

int default_threads()
{
    if (char const* env = std::getenv("MAGLARMOR_THREADS"))
    {
        int n = std::atoi(env);
        if (n > 0)
            return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}
}  // namespace

void set_thread_count(int n)
{
    g_threads = n > 0 ? n : 0;
}

int thread_count()
{
    return g_threads > 0 ? g_threads : default_threads();
}

void parallel_for(std::size_t n, std::function<void(std::size_t)> const& fn)
{
    int nt = thread_count();
    if (nt <= 1 || n < 2)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::size_t workers = std::min<std::size_t>(nt, n);
    std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
    {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi)
            break;
        pool.emplace_back([&fn, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i)
                fn(i);
        });
    }
    for (auto& t : pool)
        t.join();
}

}  // namespace maglarmor
