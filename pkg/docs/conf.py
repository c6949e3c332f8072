# -*- coding: utf-8 -*-
#
# PyFedHQL documentation build configuration file
#
# This file is execfile()d with the current directory set to its containing dir.

import sys, os

# If extensions (or modules to document with autodoc) are in another directory,
# add these directories to sys.path here.
sys.path.insert(0, os.path.abspath('..'))

from pyfedhql.version import __version__

# -- General configuration -----------------------------------------------------

extensions = ['sphinx.ext.autodoc',
              'sphinx_automodapi.automodapi',
              'sphinx.ext.autosummary',
              'sphinx.ext.mathjax',
              'autodocsumm',
              'sphinx_autodoc_typehints',
              'm2r2',
              'sphinx.ext.coverage']

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

project = u'pyfedhql'
copyright = u'2026, PyFedHQL Developers'
author = 'PyFedHQL Developers'

autodoc_default_options = {
    'autosummary': True,
    'automodapi_inheritance_diagram': False
}

# The short X.Y version and the full version, including alpha/beta/rc tags.
version = __version__
release = __version__

exclude_patterns = ['_build']

pygments_style = 'sphinx'

# -- Options for HTML output ---------------------------------------------------

on_rtd = os.environ.get("READTHEDOCS", None) == "True"

if not on_rtd:  # only import and set the theme if we're building docs locally
    import sphinx_rtd_theme
    html_theme = "sphinx_rtd_theme"
    html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]

html_static_path = ['_static']

htmlhelp_basename = 'pyfedhqldoc'

# -- Options for LaTeX output --------------------------------------------------

latex_elements = {
}

latex_documents = [
  ('index', 'pyfedhql.tex', u'PyFedHQL Documentation',
   u'PyFedHQL Developers', 'manual'),
]

# -- Options for manual page output --------------------------------------------

man_pages = [
    ('index', 'pyfedhql', u'PyFedHQL Documentation',
     [u'PyFedHQL Developers'], 1)
]
