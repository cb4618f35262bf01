"""Discrete potential theory and Hardy trace measures on finite rooted trees."""
from .tree import (PREROOT, DyadicAddress, RootedTree, TreeError, build_from_parent_list,
                   build_homogeneous, path_tree, star_tree)
from .measures import (EdgeWeight, Exponent, TreeMeasure, besov_weight, canonical_weight,
                       conj, cumulate, lebesgue, leaf_measure, pi_sigma_convert, point_mass,
                       weight_from_rule, zero_measure)

__version__ = "0.1.0"
