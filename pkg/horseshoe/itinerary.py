"""
Symbolic itineraries of the map.

Away from the fold the set ``V ∩ 𝓕⁻¹(V)`` falls apart into countably many
vertical strips, each mapped across V. A strip is named by the side of the
critical curve it lies on and by the number of turns its image makes::

    ('L', 3)    left of θ_c, image angle in the fourth turn

An :class:`ItineraryTree` groups sample points by their symbols under
iteration. Its root holds all samples, the children of a node at depth ℓ
split the node's samples by the symbol of their ℓ-th iterate::

    tree = itinerary_tree(params)
    tree.show()

    root
    ├── L0
    │   ├── L0
    │   └── R0
    └── R0
        ├── L0
        └── R0
"""

import logging
import math

import numpy as np
from anytree import AnyNode
from anytree import LevelOrderGroupIter
from anytree import LevelOrderIter
from anytree import PreOrderIter
from anytree import RenderTree
from anytree import find
from anytree import findall
from scipy.optimize import brentq

from . import conf
from .exceptions import NoBoundary
from .mapcore import THETA_MIN
from .mapcore import TWO_PI
from .mapcore import _critical_unwrapped
from .mapcore import domain_boundaries
from .mapcore import normalize_angle
from .mapcore import step


logger = logging.getLogger(__name__)


def symbol_of(params, theta, z, floor=None, origin=THETA_MIN):
    """
    Symbol ``(side, turn)`` of a point of V whose image is in V, None
    otherwise. Images thinner than *floor* in z carry no symbol.

    θ is taken mod 2π in ``[origin, origin + 2π)``, where *origin* is a point
    of U below V (see :func:`symbol_origin`). The turn counts whole turns of
    the image angle above *origin*.
    """
    floor = conf.get('SYMBOL_FLOOR') if floor is None else floor
    theta = origin + (theta - origin) % TWO_PI
    image = step(params, theta, z)
    if image is None:
        return None
    theta1, z1 = image
    if z1 < floor or not params.F(theta1, z1) > params.escape_floor:
        return None
    g = 1.0 - params.d * params.F_theta(theta) / params.F(theta, z)
    side = 'L' if g < 0 else 'R'
    return side, int(math.floor((theta1 - origin) / TWO_PI))


def symbol_origin(params, z=0.0):
    """
    Middle of the gap U left of the primary strip V. Images in V never land
    in U, so turns counted from here split V + 2πj cleanly.
    """
    try:
        left, right = domain_boundaries(params, z)
    except NoBoundary:
        return THETA_MIN
    return left - 0.5 * (TWO_PI - (right - left))


def symbol_label(symbol):
    return '{}{}'.format(*symbol)


class ItineraryTree(AnyNode):
    """
    A tree of itineraries built from sample points, modelled on anytree's
    :class:`~anytree.node.anynode.AnyNode`.

    :param params: :class:`~horseshoe.mapcore.MapParams`
    :param items: list of ``(θ, z)`` sample points
    :param symbol: symbol of this node, None for the root
    """

    MAX_DEPTH = 2
    """
    Length of the longest itinerary represented in the tree.
    """

    SYMBOLS = None
    """
    Restrict the tree to these symbols. By default every symbol met by the
    samples is followed.
    """

    def __init__(self, params, items=None, symbol=None, **kwargs):
        super().__init__(**kwargs)
        self._params = params
        self._items = list(items or [])
        self._symbol = symbol
        self._origin = self.parent._origin if self.parent is not None else symbol_origin(params)
        self._children_by_symbol = dict()
        self._build_tree()

    def __str__(self):
        return symbol_label(self._symbol) if self._symbol else 'root'

    def __repr__(self):
        classname = type(self).__name__
        return '{}(symbol={}, items={})'.format(classname, self._symbol, len(self._items))

    def __contains__(self, __key):
        return self._children_by_symbol.__contains__(__key)

    def __getitem__(self, __key):
        return self._children_by_symbol.__getitem__(__key)

    def __iter__(self):
        return self._children_by_symbol.__iter__()

    @property
    def symbol(self):
        """
        Symbol of the node. None for the root node.
        """
        return self._symbol

    @property
    def itinerary(self):
        """
        Tuple of the symbols on the path from the root to this node.
        """
        return tuple(n.symbol for n in self.path[1:])

    @property
    def items(self):
        """
        Sample points whose orbits realize :attr:`.itinerary`.
        """
        return self._items

    def render(self):
        return RenderTree(self)

    def show(self, format='{node}'):
        for prefix, _, node in self.render():
            print('{}{}'.format(prefix, format.format(node=node)))

    def get(self, itinerary=None, filter=None):
        """
        Lookup a node by its itinerary or a filter.
        """
        if itinerary is not None:
            itinerary = tuple(itinerary)
            filter = lambda n: n.itinerary == itinerary
        return find(self, filter)

    def find(self, filter=None):
        return findall(self, filter)

    def iterate(self, by_level=False, by_grouped_level=False, maxlevel=None):
        if by_level:
            iter_class = LevelOrderIter
        elif by_grouped_level:
            iter_class = LevelOrderGroupIter
        else:
            iter_class = PreOrderIter
        return iter_class(self, maxlevel=maxlevel)

    def _iterate_item(self, item, times):
        theta, z = item
        for _ in range(times):
            image = step(self._params, theta, z)
            if image is None:
                return None
            theta, z = normalize_angle(image[0]), image[1]
        return theta, z

    def _build_tree(self):
        if self.depth >= self.MAX_DEPTH:
            return
        groups = dict()
        for item in self._items:
            point = self._iterate_item(item, self.depth)
            if point is None:
                continue
            symbol = symbol_of(self._params, *point, origin=self._origin)
            if symbol is None or (self.SYMBOLS and symbol not in self.SYMBOLS):
                continue
            groups.setdefault(symbol, list()).append(item)
        for symbol in sorted(groups):
            child = type(self)(self._params, groups[symbol], symbol, parent=self)
            self._children_by_symbol[symbol] = child


def top_symbols(params, count=3, z=0.0):
    """
    The *count* widest full strips on each side of the fold: the lowest
    turns whose strips are mapped across the whole of V.

    :return: list of symbols
    """
    interval = domain_boundaries(params, z)
    theta_c = _critical_unwrapped(params, z, interval)
    theta1_c = step(params, theta_c, z)[0]
    # strip j is full when V + 2πj lies above the fold value
    first = math.ceil((theta1_c - interval[0]) / TWO_PI)
    turns = range(first, first + count)
    return [(side, j) for side in ('L', 'R') for j in turns]


def _preimage(params, symbol, target, z, interval, theta_c):
    """
    θ on the side of *symbol* whose image angle is ``target`` in the turn of
    the symbol.
    """
    side, turn = symbol
    goal = target + TWO_PI * turn

    def func(t):
        return step(params, t, z)[0] - goal

    lo, hi = (interval[0], theta_c) if side == 'L' else (theta_c, interval[1])
    # endpoints of V map to +∞, step inward until the sign is right
    for exponent in range(3, 16):
        inset = (hi - lo) * 10.0 ** -exponent
        a, b = lo + inset, hi - inset
        if min(params.F(a, z), params.F(b, z)) > params.escape_floor:
            fa, fb = func(a), func(b)
            if fa * fb <= 0:
                return brentq(func, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return None


def symbolic_samples(params, symbols, depth=2, z_levels=(0.0,)):
    """
    One sample point per word of *depth* symbols and z level, constructed
    backward: the last symbol maps to the middle of V, every earlier one to
    the point built for the rest of the word.

    :return: list of ``(θ, z)``
    """
    samples = list()
    for z in z_levels:
        try:
            interval = domain_boundaries(params, z)
        except NoBoundary:
            continue
        theta_c = _critical_unwrapped(params, z, interval)
        centre = 0.5 * (interval[0] + interval[1])
        words = [()]
        for _ in range(depth):
            words = [w + (s,) for w in words for s in symbols]
        for word in words:
            target = centre
            theta = None
            for symbol in reversed(word):
                theta = _preimage(params, symbol, target, z, interval, theta_c)
                if theta is None:
                    break
                target = theta
            if theta is not None:
                samples.append((theta, z))
    return samples


def itinerary_tree(params, samples=None, depth=2, symbols=None, z_levels=(0.0,)):
    """
    Build an :class:`ItineraryTree` of the given depth.

    :param samples: sample points, by default :func:`symbolic_samples` for
        the :func:`top_symbols`
    """
    symbols = symbols or top_symbols(params)
    if samples is None:
        samples = symbolic_samples(params, symbols, depth, z_levels)
    tree_class = type('ItineraryTree{}'.format(depth), (ItineraryTree,), {'MAX_DEPTH': depth, 'SYMBOLS': list(symbols)})
    return tree_class(params, samples)


def full_shift_ok(tree, symbols=None):
    """
    Whether every ordered pair of symbols ``(i, j)`` is realized by a sample
    in strip i whose image is in strip j.
    """
    symbols = symbols or tree.SYMBOLS or list(tree)
    for i in symbols:
        if i not in tree:
            return False
        if any(j not in tree[i] for j in symbols):
            return False
    return True
