# Copyright maglarmor contributors: see top-level LICENSE for details
# SPDX-License-Identifier: Apache-2.0
"""Permanent-magnet field design and neutron spin-dynamics toolkit."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
