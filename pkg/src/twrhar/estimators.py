"""scikit-learn style wrappers around the recognition chain.

``EchoToMap`` turns echoes into working maps, ``SignatureExtractor`` turns
maps into contour point clouds, and ``TopologicalTemplateClassifier`` keeps
a per-class template library and labels new clouds by summed Jaccard
similarity. The three compose with :func:`sklearn.pipeline.make_pipeline`.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted, check_random_state

from .chanvese import ChanVeseConfig, evolve
from .corners import SiftConfig, find_seeds
from .echo import EchoMatrix
from .maps import EmdConfig, RadarMap, StftConfig, echo_to_map
from .topology import EmptyContourError, PointCloud, TemplateLibrary, classify, contour_pointcloud

__all__ = ["EchoToMap", "SignatureExtractor", "TopologicalTemplateClassifier"]


def _as_list(X, kinds, what):
    if isinstance(X, kinds):
        X = [X]
    X = list(X)
    if not X:
        raise ValueError(f"no {what} given")
    return X


class EchoToMap(TransformerMixin, BaseEstimator):
    """Echo matrices -> stacked RTM or DTM pixel arrays of shape (n, rows, cols)."""

    def __init__(self, kind="rtm", size=(128, 128), emd=None, stft=None):
        self.kind = kind
        self.size = size
        self.emd = emd
        self.stft = stft

    def fit(self, X=None, y=None):
        if self.kind not in ("rtm", "dtm"):
            raise ValueError(f"kind must be 'rtm' or 'dtm', got {self.kind!r}")
        self.n_features_out_ = tuple(self.size)
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_out_")
        echoes = _as_list(X, EchoMatrix, "echoes")
        for e in echoes:
            if not isinstance(e, EchoMatrix):
                raise TypeError("EchoToMap expects EchoMatrix inputs")
        emd = self.emd or EmdConfig()
        stft = self.stft or StftConfig()
        return np.stack([echo_to_map(e, self.kind, emd, stft, tuple(self.size)).pixels
                         for e in echoes])


class SignatureExtractor(TransformerMixin, BaseEstimator):
    """Maps -> contour point clouds (object array; None where no contour exists)."""

    def __init__(self, cut_threshold=0.3, sift=None, chan_vese=None):
        self.cut_threshold = cut_threshold
        self.sift = sift
        self.chan_vese = chan_vese

    def fit(self, X=None, y=None):
        if not 0 < self.cut_threshold < 1:
            raise ValueError("cut_threshold must lie in (0, 1)")
        self.fitted_ = True
        return self

    def _one(self, image):
        pix = image.pixels if isinstance(image, RadarMap) else np.asarray(image, dtype=float)
        if pix.ndim != 2 or not np.all(np.isfinite(pix)):
            raise ValueError("each map must be a finite 2-D array")
        seeds, _ = find_seeds(pix, self.cut_threshold, self.sift or SiftConfig())
        seg = evolve(pix, seeds, self.chan_vese or ChanVeseConfig())
        try:
            return contour_pointcloud(seg.phi1)
        except EmptyContourError:
            return None

    def transform(self, X):
        check_is_fitted(self, "fitted_")
        if isinstance(X, np.ndarray) and X.ndim == 2:
            X = [X]
        maps = _as_list(X, RadarMap, "maps")
        out = np.empty(len(maps), dtype=object)
        for i, m in enumerate(maps):
            out[i] = self._one(m)
        return out


class TopologicalTemplateClassifier(ClassifierMixin, BaseEstimator):
    """Template matching on Mapper edge sets.

    ``fit`` draws ``templates_per_class`` clouds per class at random (without
    replacement, skipping missing contours) and stores them; ``predict``
    returns the class with the largest summed similarity, ties going to the
    smaller label. A sample without a contour scores zero everywhere.
    """

    def __init__(self, templates_per_class=20, n_x=100, n_y=100, overlap_factor=1.5,
                 map_type="rtm", random_state=None):
        self.templates_per_class = templates_per_class
        self.n_x = n_x
        self.n_y = n_y
        self.overlap_factor = overlap_factor
        self.map_type = map_type
        self.random_state = random_state

    def fit(self, X, y):
        X = list(X)
        y = np.asarray(y)
        if len(X) != len(y):
            raise ValueError(f"X has {len(X)} samples but y has {len(y)}")
        if len(X) == 0:
            raise ValueError("cannot fit on an empty set")
        if self.templates_per_class < 1:
            raise ValueError("templates_per_class must be >= 1")
        rng = check_random_state(self.random_state)
        classes = {}
        for label in np.unique(y):
            members = [X[i] for i in np.flatnonzero(y == label)]
            members = [m if isinstance(m, PointCloud) or m is None else PointCloud(m)
                       for m in members]
            chosen = [members[i] for i in rng.permutation(len(members)) if members[i] is not None]
            if len(chosen) < self.templates_per_class:
                raise ValueError(f"class {label}: {len(chosen)} usable clouds, "
                                 f"{self.templates_per_class} templates requested")
            classes[int(label)] = chosen[:self.templates_per_class]
        self.library_ = TemplateLibrary(classes, self.map_type,
                                        {"n_x": self.n_x, "n_y": self.n_y,
                                         "overlap_factor": self.overlap_factor})
        self.classes_ = np.array(self.library_.labels)
        return self

    @classmethod
    def from_library(cls, library: TemplateLibrary, n_x=100, n_y=100, overlap_factor=1.5):
        clf = cls(templates_per_class=library.per_class, n_x=n_x, n_y=n_y,
                  overlap_factor=overlap_factor, map_type=library.map_type)
        clf.library_ = library
        clf.classes_ = np.array(library.labels)
        return clf

    def decision_function(self, X):
        """Class-summed similarity, shape (n_samples, n_classes), columns in ``classes_`` order."""
        check_is_fitted(self, "library_")
        out = np.zeros((len(X), len(self.classes_)))
        for i, pc in enumerate(X):
            if pc is None:
                continue
            pc = pc if isinstance(pc, PointCloud) else PointCloud(pc)
            _, scores = classify(pc, self.library_, self.n_x, self.n_y, self.overlap_factor)
            out[i] = [np.sum(scores[int(c)]) for c in self.classes_]
        return out

    def predict(self, X):
        # argmax returns the first maximum, and classes_ is sorted ascending
        return self.classes_[np.argmax(self.decision_function(list(X)), axis=1)]
