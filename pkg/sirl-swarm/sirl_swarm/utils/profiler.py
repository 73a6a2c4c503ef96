import time
from collections import deque
from contextlib import contextmanager
from statistics import mean, median


class SingletonClass(type):
    r"""
    Generic singleton metaclass
    """

    def __init__(self, name, bases, dic):
        self._instance = None
        super().__init__(name, bases, dic)

    def __call__(cls, *args, **kwargs):
        if cls._instance is None:
            singleton = cls.__new__(cls)
            singleton.__init__(*args, **kwargs)
            cls._instance = singleton
        return cls._instance


class SectionTimer:
    r"""
    Wall-clock time per named section of the training loop ("observe", "act",
    "gradients", "federal_step" ...). A section accumulates the duration and the number
    of its intervals.
    """

    def __init__(self):
        self._dt = {}
        self._calls = {}
        self._started = {}

    def begin(self, section_name, enable=True):
        if not enable:
            return False
        self._started[section_name] = time.perf_counter()
        return True

    def end(self, section_name, enable=True):
        if not enable or section_name not in self._started:
            return False
        dt = time.perf_counter() - self._started.pop(section_name)
        self._dt[section_name] = self._dt.get(section_name, 0.0) + dt
        self._calls[section_name] = self._calls.get(section_name, 0) + 1
        return True

    @contextmanager
    def section(self, section_name, enable=True):
        started = self.begin(section_name, enable)
        try:
            yield
        finally:
            if started:
                self.end(section_name)

    def get_data(self, section_names=None):
        r"""
        Returns
        -------
        dict
            section name -> {"dt": accumulated seconds, "calls": number of intervals}
        """
        names = self._dt.keys() if section_names is None else [n for n in section_names if n in self._dt]
        return {name: {"dt": self._dt[name], "calls": self._calls[name]} for name in names}


class RoundProfiler(metaclass=SingletonClass):
    r"""
    Application wide profiler keeping one SectionTimer per training round over a sliding
    window of the last rounds
    """

    def __init__(self, window_size=20):
        self._window_size = window_size
        # Newest round at index 0
        self._rounds = deque()

    def start_round(self, enable=True):
        if not enable:
            return False
        self._rounds.appendleft(SectionTimer())
        if len(self._rounds) > self._window_size:
            self._rounds.pop()
        return True

    def reset(self):
        self._rounds.clear()

    def section(self, section_name, enable=True):
        if not enable or len(self._rounds) == 0:
            return SectionTimer().section(section_name, enable=False)
        return self._rounds[0].section(section_name)

    def get_data(self):
        r"""
        Returns
        -------
        dict
            window: number of rounds in the window
            last: data of the last round
            mean / median: section -> metric -> statistic across the window
        """
        if len(self._rounds) == 0:
            return {"window": 0, "last": {}, "mean": {}, "median": {}}
        values = {}
        for timer in self._rounds:
            for name, metrics in timer.get_data().items():
                for metric, value in metrics.items():
                    values.setdefault(name, {}).setdefault(metric, []).append(value)
        data = {"window": len(self._rounds), "last": self._rounds[0].get_data(), "mean": {}, "median": {}}
        for name, metrics in values.items():
            data["mean"][name] = {m: mean(v) for m, v in metrics.items()}
            data["median"][name] = {m: median(v) for m, v in metrics.items()}
        return data
