static void bump_counter(struct dev *d, int delta)
{
	d->count += delta;
	d->events++;
	notify(d);
}
