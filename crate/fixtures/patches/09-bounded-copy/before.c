static void set_label(struct part *p, const char *src)
{
	strcpy(p->label, src);
	p->dirty = 1;
}
