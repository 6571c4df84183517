"""
Getter and Setter class for storing results of every command.
"""


class ModelsResults:
    """
    Getter and setter class for storing command results.
    """
    def __init__(self):
        """
        Initializes the results with empty values.
        """
        self._corpus_paths = {}
        self._train_state = None
        self._metrics = {}
        self._pseudo_labels = {}
        self._uncertainty_cdf = None
        self._uncertainty_summary = None
        self._correlation_series = None
        self._written_files = []

    @property
    def corpus_paths(self):
        """
        Gets the manifest paths written by the synth command.

        Returns:
            dict: Split name to manifest path.
        """
        return self._corpus_paths

    @corpus_paths.setter
    def corpus_paths(self, value):
        """
        Sets the manifest paths written by the synth command.

        Args:
            value (dict): Split name to manifest path.
        """
        self._corpus_paths = value


    @property
    def train_state(self):
        """
        Gets the final training state.

        Returns:
            TrainState: Heads, optimizer moments and pseudo-labels.
        """
        return self._train_state

    @train_state.setter
    def train_state(self, value):
        """
        Sets the final training state.

        Args:
            value (TrainState): Heads, optimizer moments and pseudo-labels.
        """
        self._train_state = value


    @property
    def metrics(self):
        """
        Gets the evaluation report.

        Returns:
            dict: AUC, AP, per-class breakdown and provenance.
        """
        return self._metrics

    @metrics.setter
    def metrics(self, value):
        self._metrics = value


    @property
    def pseudo_labels(self):
        """
        Gets the exported pseudo-label sets, keyed by head.
        """
        return self._pseudo_labels

    @pseudo_labels.setter
    def pseudo_labels(self, value):
        self._pseudo_labels = value


    @property
    def uncertainty_cdf(self):
        """
        Gets the CDF table: one row per CDL step, one column per bin edge.

        Returns:
            DataFrame: Cumulative fractions of per-video mean uncertainty scores.
        """
        return self._uncertainty_cdf

    @uncertainty_cdf.setter
    def uncertainty_cdf(self, value):
        self._uncertainty_cdf = value


    @property
    def uncertainty_summary(self):
        """
        Gets mean uncertainty and confident mass per CDL step.
        """
        return self._uncertainty_summary

    @uncertainty_summary.setter
    def uncertainty_summary(self, value):
        self._uncertainty_summary = value


    @property
    def correlation_series(self):
        """
        Gets the uncertainty/error correlation per CDL step, or None when skipped.

        Returns:
            DataFrame: Columns cdl_step, rho, p_value, n_segments.
        """
        return self._correlation_series

    @correlation_series.setter
    def correlation_series(self, value):
        self._correlation_series = value


    @property
    def written_files(self):
        """
        Gets the paths of files written by the last command.
        """
        return self._written_files

    @written_files.setter
    def written_files(self, value):
        self._written_files = value
