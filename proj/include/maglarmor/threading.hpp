//---------------------------------------------------------------------------//
// Copyright maglarmor contributors: see top-level LICENSE for details
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file maglarmor/threading.hpp
//! Deterministic parallel loop over index ranges.
//---------------------------------------------------------------------------//
#pragma once

#include <cstddef>
#include <functional>

namespace maglarmor
{

//! Set the worker count; 0 restores the default (env MAGLARMOR_THREADS,
//! else hardware concurrency).
void set_thread_count(int n);
int thread_count();

//! Run fn(i) for i in [0, n). Work is split into contiguous chunks; each
//! index is processed exactly once, so disjoint writes are race-free and
//! results do not depend on the worker count.
void parallel_for(std::size_t n, std::function<void(std::size_t)> const& fn);

}  // namespace maglarmor
